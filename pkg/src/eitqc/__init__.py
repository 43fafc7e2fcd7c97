"""EIT-based toolkit for photonic quantum computing with atomic ensembles."""
