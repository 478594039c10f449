"""Graph contrastive learning with spectrum-preserving augmentation and asymmetric encoders."""

__version__ = "0.1.0"
