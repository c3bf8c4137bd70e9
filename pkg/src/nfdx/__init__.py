"""Vibration-fault diagnosis from antenna S11 traces.

Subpackages: physics (closed-form formulas), synth (trace generator),
dsp (power, spectra, spectrograms), nn (CNN), complexity, evaluation, cli.
"""

__version__ = "0.1.0"
