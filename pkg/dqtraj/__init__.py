""" Disordered quantum trajectories: repeated Kraus measurements driven by
an ergodic environment, with exact and statistical ergodic checks """
__version__ = '0.1.0'

from .assignments import *
from .channels import *
from .config import *
from .environment import *
from .ergodics import *
from .exceptions import *
from .families import *
from .matrixcore import *
from .measures import *
from .output import *
from .rng import *
from .trajectory import *
