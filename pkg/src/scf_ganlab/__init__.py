"""GAN-based minority oversampling for supply-chain-finance credit-risk data."""

__version__ = "0.1.0"
