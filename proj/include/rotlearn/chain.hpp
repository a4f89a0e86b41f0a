#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotlearn/mat.hpp"

namespace rotlearn {

/// Serial chain: K joints, each with a fixed offset expressed in its parent
/// segment frame. Joint matrices are NOT required to be orthogonal; FK is
/// linear in each of them.
struct KinematicChain {
    Vec3 root;
    std::vector<Vec3> offsets;

    int joints() const { return static_cast<int>(offsets.size()); }
};

struct ChainPose {
    std::vector<Mat3> joints;
};

/// K+1 positions: root first, then one per segment tip. position[i+1] =
/// position[i] + (R_0 ... R_i) * offset_i.
inline std::vector<Vec3> forward_kinematics(const KinematicChain& chain, const ChainPose& pose) {
    const int k = chain.joints();
    if (static_cast<int>(pose.joints.size()) != k)
        throw std::invalid_argument("forward_kinematics: pose size mismatch");
    std::vector<Vec3> pos(static_cast<std::size_t>(k) + 1);
    pos[0] = chain.root;
    Mat3 acc = Mat3::identity();
    for (int i = 0; i < k; ++i) {
        acc = acc * pose.joints[i];
        pos[i + 1] = pos[i] + acc * chain.offsets[i];
    }
    return pos;
}

/// d positions / d joint entries, ((K+1)*3) x (K*9), column-major flattening
/// on both sides. Linear in each joint: the block for joint j does not depend
/// on joint j itself, only on the others.
inline MatX fk_jacobian(const KinematicChain& chain, const ChainPose& pose) {
    const int k = chain.joints();
    if (static_cast<int>(pose.joints.size()) != k)
        throw std::invalid_argument("fk_jacobian: pose size mismatch");
    MatX jac(3 * (k + 1), 9 * k);

    // Prefix products: before[j] = R_0 ... R_{j-1}.
    std::vector<Mat3> before(static_cast<std::size_t>(k) + 1);
    before[0] = Mat3::identity();
    for (int j = 0; j < k; ++j) before[j + 1] = before[j] * pose.joints[j];

    for (int j = 0; j < k; ++j) {
        // c_i = (R_{j+1} ... R_i) * offset_i, accumulated over i >= j.
        Vec3 csum;
        Mat3 between = Mat3::identity();
        std::vector<Vec3> c(static_cast<std::size_t>(k));
        for (int i = j; i < k; ++i) {
            if (i > j) between = between * pose.joints[i];
            c[i] = between * chain.offsets[i];
        }
        for (int m = j + 1; m <= k; ++m) {
            csum += c[m - 1];
            for (int b = 0; b < 3; ++b)
                for (int a = 0; a < 3; ++a)
                    for (int r = 0; r < 3; ++r)
                        jac(3 * m + r, 9 * j + 3 * b + a) = csum.a[b] * before[j](r, a);
        }
    }
    return jac;
}

/// Text config: first data line is K, then K lines "x y z". '#' starts a
/// comment, blank lines are skipped. Root is the origin.
inline KinematicChain parse_chain_config(std::istream& is) {
    std::vector<std::string> lines;
    std::string raw;
    while (std::getline(is, raw)) {
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw = raw.substr(0, hash);
        std::istringstream probe(raw);
        std::string tok;
        if (probe >> tok) lines.push_back(raw);
    }
    if (lines.empty()) throw std::runtime_error("chain config: empty");
    std::istringstream head(lines[0]);
    int k = 0;
    if (!(head >> k) || k < 1) throw std::runtime_error("chain config: bad joint count");
    if (static_cast<int>(lines.size()) != k + 1)
        throw std::runtime_error("chain config: expected " + std::to_string(k) +
                                    " offset lines");
    KinematicChain chain;
    for (int i = 0; i < k; ++i) {
        std::istringstream ls(lines[static_cast<std::size_t>(i) + 1]);
        double x, y, z;
        if (!(ls >> x >> y >> z))
            throw std::runtime_error("chain config: bad offset on line " + std::to_string(i));
        chain.offsets.push_back(vec3(x, y, z));
    }
    return chain;
}

inline KinematicChain load_chain_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("chain config: cannot open " + path);
    return parse_chain_config(is);
}

/// Default desk-scale chain: 4 joints, unit segments along alternating axes.
inline KinematicChain default_chain() {
    KinematicChain chain;
    chain.offsets = {vec3(1, 0, 0), vec3(1, 0, 0), vec3(0, 1, 0), vec3(0, 0, 1)};
    return chain;
}

}  // namespace rotlearn
