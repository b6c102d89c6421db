import numpy as np
import numpy.typing as npt

# Real-valued arrays. Leading axes index replicas and/or agents, the last
# axis indexes parameter coordinates.
FloatArray = npt.NDArray[np.float64]
