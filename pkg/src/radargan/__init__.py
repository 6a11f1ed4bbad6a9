"""FDTD-simulated ultra-wideband radar traces and a 1D convolutional GAN.

Subpackages cover the full pipeline: scene simulation (:mod:`radargan.fdtd`),
dataset generation (:mod:`radargan.dataset`), a minimal neural-network engine
(:mod:`radargan.nn`), adversarial training (:mod:`radargan.gan`), model
scoring (:mod:`radargan.evaluation`), and a blind-test service
(:mod:`radargan.serve`). ``radargan --help`` lists the command-line surface.
"""

__version__ = "0.1.0"
