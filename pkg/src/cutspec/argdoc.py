CONFIG = "Study configuration file with one 'key = value' per line"
PROBLEM = "Problem name from the registry (see cutspec.list-problems)"
OVERRIDE_ASSUMPTION = "Skip meshes where the interface crosses an element boundary more than twice instead of failing"
NUM_WORKERS = "Number of parallel sweep jobs. 0 uses one per CPU"
OUTPUT = "Path of the csv report"
NO_PROGRESS = "Hide progress bars"
NUM_ELEMENTS = "Elements per side of the background mesh"
DEGREE = "Polynomial degree of the spectral elements"
NUM_EIGENVALUES = "Number of smallest eigenvalues to compute"
SEED = "Seed of the Lanczos start vectors"
VERBOSE = "Log debug messages"
