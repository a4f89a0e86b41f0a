// Walks one noisy matrix through the three orthogonalization routes and
// prints where the gradients blow up. Run with no arguments.

#include <cstdio>

#include <rotlearn/rotlearn.hpp>

using namespace rotlearn;

int main() {
    Rng rng(7);
    const Mat3 r = sample_rotation(rng);
    const Mat3 p = perturb_rotation(rng, r, 0.3);

    std::printf("input distance to truth: %.4f (frobenius)\n",
                frobenius_norm(p - r));

    const Mat3 via_gs = gram_schmidt(p);
    const Mat3 via_svd = svd_orthogonalize_special(p);
    std::printf("gram-schmidt projection error: %.4f deg\n", geodesic_deg(via_gs, r));
    std::printf("svd projection error:          %.4f deg\n", geodesic_deg(via_svd, r));

    std::printf("\njacobian frobenius norms at this input:\n");
    std::printf("  identity: %.3f\n", frobenius_norm(prom_jacobian()));
    std::printf("  gs:       %.3f\n", frobenius_norm(gram_schmidt_jacobian(p)));
    const SvdJacobian sj = svd_jacobian_auto(p);
    std::printf("  svd:      %.3f%s\n", frobenius_norm(sj.jac),
                sj.near_degenerate ? " (near-degenerate)" : "");

    // Push the svd route toward its singular surface: a reflection with two
    // singular values closing in on each other.
    std::printf("\nsvd jacobian near a reflective input, shrinking gap:\n");
    for (double gap : {1e-2, 1e-4, 1e-6}) {
        const Mat3 bad = svd_probe_input(gap);
        const SvdJacobian j = svd_orthogonalize_jacobian(bad);
        std::printf("  gap %.0e -> norm %.3e%s\n", gap, frobenius_norm(j.jac),
                    j.near_degenerate ? " (flagged)" : "");
    }
    return 0;
}
