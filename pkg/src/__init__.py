# Multifractional Gaussian process simulation and verification
