// Fits lasso and covariance-thresholded lasso paths on one simulated data set
// and prints how many variables each path activates before it stops.
#include <iostream>

#include <ctlasso/ctlasso.hpp>

int main()
{
    using namespace ctlasso;

    SimulationDesign design = presets::ex2(20);
    design.seed = 7;
    const SimulatedData data = gen_data(design, 0);
    const StandardizedDesign sd = standardize(data.x, data.y);

    for (double nu : {0.0, 0.3, 0.6, 0.9}) {
        const SolutionPath path = ct_lars(sd, nu == 0.0 ? ThresholdRule::identity() : ThresholdRule::soft(nu));
        const auto& last = path.breakpoints.back();
        std::cout << "nu=" << nu << "  breakpoints=" << path.breakpoints.size()
                  << "  final active=" << last.active.size() << "  lambda_end=" << last.lambda
                  << "  termination=" << to_string(path.termination) << "\n";
    }
}
