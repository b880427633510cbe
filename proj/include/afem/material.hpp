#pragma once

namespace afem {

struct MaterialParams {
    double mu = 1.0;                  // shear modulus
    double density = 1.0;             // mass density in the wave equation
    double viscosity = 1.0;           // eta
    double kappa = 1e-10;             // residual stiffness
    double lambda_c = 1.0;            // critical energy release rate
    double c_w = 8.0 / 3.0;           // AT1 normalisation constant
    double epsilon = 0.01;            // phase-field length scale

    /// Gradient weight of the phase-field functional, 2 lambda_c eps / c_w.
    double rho_pf() const { return 2.0 * lambda_c * epsilon / c_w; }
    /// Source weight of the phase-field functional, lambda_c / (c_w eps).
    double nu_pf() const { return lambda_c / (c_w * epsilon); }

    /// Throws ConfigError unless every constant is positive and kappa < 1.
    void validate() const;
};

/// Anti-plane shear loading on the left edge.
struct LoadingParams {
    double eps_v = 0.9;   // loading rate
    double t_s = 0.5;     // end of the quadratic ramp
    double t_g = 5.0;     // end of the loading window
    double slit_y = 1.5;  // sign change of the boundary data
};

/// Magnitude of the boundary displacement; throws std::domain_error for
/// t outside [0, t_g].
double g0(double t, const LoadingParams& p);

} // namespace afem
