import os.path, sys as system
from collections import OrderedDict as OD, deque
