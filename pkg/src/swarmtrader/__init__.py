"""swarmtrader: a prediction-market swarm trading terminal.

Persona-pool probability estimates are aggregated into a market-mixed
consensus, screened with information-theoretic divergence and
cross-market consistency checks, sized with fractional Kelly under hard
risk caps, and executed in paper or live mode, all observable and
steerable over REST/WebSocket.
"""

__version__ = "0.1.0"
