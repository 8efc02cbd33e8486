"""Triangle lower tails in the critical window: rate formulas, Gibbs samplers,
cluster expansions and exact small-n oracles."""

__version__ = "0.1.0"
