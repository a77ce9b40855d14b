"""Hypertree, generalized and fractional hypertree decompositions."""
