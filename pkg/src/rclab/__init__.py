"""rclab: Monte Carlo and exact-enumeration laboratory for the critical
planar random-cluster model (cluster weight q in [1, 4])."""

__version__ = "0.1.0"
