"""Transverse problem, measures, Orlicz norms, bound assembly and counting oracles."""
