#pragma once

#include <functional>

namespace turb {

// Adaptive Gauss-Kronrod (15 point) integration on [a,b].
// relTol is relative to the accumulated integral magnitude.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double relTol = 1e-12, double absTol = 1e-300, int maxDepth = 40);

// Fixed-order Gauss-Legendre on [a,b]. Supported orders: 4..16, 32.
// Exact for polynomials of degree <= 2n-1.
double gauss_legendre(const std::function<double(double)>& f, double a, double b, int n);

// Nodes/weights of the n-point Gauss-Legendre rule mapped to [a,b].
void gauss_legendre_nodes(int n, double a, double b, double* x, double* w);

}  // namespace turb
