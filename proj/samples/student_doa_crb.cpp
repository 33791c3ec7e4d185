// CRB on the spatial frequency of a single source versus the Student degrees of freedom,
// for i.i.d. snapshots (EMS) and for a whole-matrix Student (EVS), against the Gaussian bound.
//
//   ./student_doa_crb [M] [T]

#include <cstdio>
#include <cstdlib>

#include "ecfim/fim.hpp"
#include "ecfim/models.hpp"

int main(int argc, char** argv) {
    using namespace ecfim;
    const int M = argc > 1 ? std::atoi(argv[1]) : 8;
    const int T = argc > 2 ? std::atoi(argv[2]) : 16;

    const auto model = make_ula_doa(M, T);
    const auto theta = model.params({1.0, 0.2, 0.7, 1.0});
    const auto ev = evaluate_model(model, theta);

    const double gauss = crb_from_fim(fim_gaussian_sb(ev, T)).entries(2, 2);
    std::printf("ula-doa M=%d T=%d, A=1, sigma2=1\n", M, T);
    std::printf("%10s  %14s  %14s  %14s\n", "dof", "CRB(omega) EMS", "CRB(omega) EVS", "Gaussian");
    for (double d : {0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e4}) {
        const auto s = DensityGenerator::student(d);
        const auto ems = fim_ems(ev, modular_moments(s, M, MomentMethod::Analytic), T);
        const auto evs = fim_evs(ev, modular_moments(s, M * T, MomentMethod::Analytic), T);
        std::printf("%10g  %14.6e  %14.6e  %14.6e\n", d, crb_from_fim(ems).entries(2, 2),
                    crb_from_fim(evs).entries(2, 2), gauss);
    }
    return 0;
}
