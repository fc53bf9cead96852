"""Two-dimensional transient heat conduction in multi-layer building facades.

Simulates a layered wall under time- and height-varying exterior boundary
conditions (wind-dependent surface coefficient, shading by a front building)
with a fast three-level explicit scheme plus explicit/implicit Euler and ADI
comparators, tangent-linear sensitivities of the boundary-condition
parameters, and the validation/energy-analysis pipelines around them.
"""

from ._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"
__all__ = ["kernel_backend", "__version__"]
