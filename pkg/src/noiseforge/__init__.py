"""noiseforge: device-aware quantum circuit compilation with a learned noise model.

The package couples a synthetic noisy-device simulator with a small
convolutional network trained to rank equivalent circuits by their expected
output noise; a gap-filling compiler uses the trained network to pick
identity-equivalent gate sequences that minimize predicted noise.
"""

__version__ = "0.1.0"
