"""Link-level SWIPT simulator: OFDM transmit chain with PA nonlinearity,
digital predistortion and mu-law companding, a power-splitting receiver,
and rectenna energy-harvesting models."""

__version__ = "0.1.0"
