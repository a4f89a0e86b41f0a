#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include <rotlearn/chain.hpp>
#include <rotlearn/rotations.hpp>

using namespace rotlearn;

namespace {

ChainPose identity_pose(int k) {
    ChainPose pose;
    pose.joints.assign(static_cast<std::size_t>(k), Mat3::identity());
    return pose;
}

}  // namespace

TEST_CASE("default chain at the identity pose unrolls along its offsets") {
    const KinematicChain chain = default_chain();
    const auto pos = forward_kinematics(chain, identity_pose(chain.joints()));
    REQUIRE(pos.size() == 5);
    const Vec3 want[5] = {vec3(0, 0, 0), vec3(1, 0, 0), vec3(2, 0, 0), vec3(2, 1, 0),
                          vec3(2, 1, 1)};
    for (int i = 0; i < 5; ++i) REQUIRE(max_abs(pos[static_cast<std::size_t>(i)] - want[i]) == 0.0);
}

TEST_CASE("rotating the first joint rotates every downstream segment") {
    const KinematicChain chain = default_chain();
    ChainPose pose = identity_pose(chain.joints());
    pose.joints[0] = rot_z(kPi / 2);
    const auto pos = forward_kinematics(chain, pose);
    const Vec3 want[5] = {vec3(0, 0, 0), vec3(0, 1, 0), vec3(0, 2, 0), vec3(-1, 2, 0),
                          vec3(-1, 2, 1)};
    for (int i = 0; i < 5; ++i)
        REQUIRE(max_abs(pos[static_cast<std::size_t>(i)] - want[i]) < 1e-15);
}

TEST_CASE("fk accepts non-orthogonal joint matrices") {
    // The training path feeds raw 9-entry matrices through FK; it must be
    // linear in each joint, not a rotation-only map.
    KinematicChain chain;
    chain.root = vec3(0, 0, 0);
    chain.offsets = {vec3(1, 0, 0)};
    ChainPose pose;
    Mat3 m = Mat3::zero();
    m(0, 0) = 2.0;
    m(1, 0) = -1.0;
    pose.joints = {m};
    const auto pos = forward_kinematics(chain, pose);
    REQUIRE(max_abs(pos[1] - vec3(2, -1, 0)) == 0.0);
}

TEST_CASE("fk_jacobian agrees with finite differences at random raw poses") {
    Rng rng(701);
    const KinematicChain chain = default_chain();
    const int k = chain.joints();
    for (int trial = 0; trial < 100; ++trial) {
        ChainPose pose;
        pose.joints.resize(static_cast<std::size_t>(k));
        for (Mat3& j : pose.joints)
            for (double& v : j.a) v = rng.normal();
        const MatX jac = fk_jacobian(chain, pose);
        REQUIRE(jac.rows == 3 * (k + 1));
        REQUIRE(jac.cols == 9 * k);
        for (int j = 0; j < k; ++j)
            for (int e = 0; e < 9; ++e) {
                double& entry = pose.joints[static_cast<std::size_t>(j)].a[static_cast<std::size_t>(e)];
                const double keep = entry;
                const double h = 1e-6 * std::max(1.0, std::abs(keep));
                entry = keep + h;
                const auto hi = forward_kinematics(chain, pose);
                entry = keep - h;
                const auto lo = forward_kinematics(chain, pose);
                entry = keep;
                for (int m = 0; m <= k; ++m)
                    for (int c = 0; c < 3; ++c) {
                        const double fd =
                            (hi[static_cast<std::size_t>(m)].a[c] - lo[static_cast<std::size_t>(m)].a[c]) /
                            (2 * h);
                        REQUIRE(std::abs(jac(3 * m + c, 9 * j + e) - fd) <
                                1e-6 * std::max(1.0, std::abs(fd)));
                    }
            }
    }
}

TEST_CASE("fk_jacobian block for a joint ignores that joint's own value") {
    // FK is linear in each joint, so d pos / d joint j depends only on the
    // other joints.
    Rng rng(702);
    const KinematicChain chain = default_chain();
    const int k = chain.joints();
    ChainPose pose;
    pose.joints.resize(static_cast<std::size_t>(k));
    for (Mat3& j : pose.joints)
        for (double& v : j.a) v = rng.normal();
    const MatX before = fk_jacobian(chain, pose);
    for (double& v : pose.joints[1].a) v = rng.normal();
    const MatX after = fk_jacobian(chain, pose);
    for (int r = 0; r < before.rows; ++r)
        for (int c = 9; c < 18; ++c) REQUIRE(before(r, c) == after(r, c));
}

TEST_CASE("chain config parsing") {
    std::istringstream good(
        "# joints\n"
        "2\n"
        "1 0 0\n"
        "0 0.5 0\n");
    const KinematicChain chain = parse_chain_config(good);
    REQUIRE(chain.joints() == 2);
    REQUIRE(max_abs(chain.offsets[1] - vec3(0, 0.5, 0)) == 0.0);

    std::istringstream missing("3\n1 0 0\n");
    REQUIRE_THROWS_AS(parse_chain_config(missing), std::runtime_error);

    std::istringstream bad_count("0\n");
    REQUIRE_THROWS_AS(parse_chain_config(bad_count), std::runtime_error);

    std::istringstream junk("2\n1 0 0\nalpha beta gamma\n");
    REQUIRE_THROWS_AS(parse_chain_config(junk), std::runtime_error);
}

TEST_CASE("missing chain config file raises") {
    REQUIRE_THROWS_AS(load_chain_config("/nonexistent/rotlearn_chain.txt"), std::runtime_error);
}
