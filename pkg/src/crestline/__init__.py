"""Small-amplitude steady water waves with vorticity over a shear-flow stream.

Modules, in pipeline order: vorticity, stream, dispersion, reduction,
dynamics, reconstruction; ``cli`` drives them from a config file.
"""
__version__ = "0.1.0"

from .vorticity import VorticityModel
from .stream import StreamSolution, build_stream
from .dispersion import DispersionSpectrum, solve_spectrum
from .reduction import ReducedModel, ReducedState, build_model
from .dynamics import Trajectory, SymmetryReport, integrate, symmetry_scan
from .reconstruction import WaveFields, reconstruct
