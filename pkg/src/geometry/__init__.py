"""Numerical core: special functions, exact laws, polytope and covering simulators."""
