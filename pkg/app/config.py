import os
from dotenv import load_dotenv, find_dotenv

load_dotenv(find_dotenv())

EMTC_WORKERS = int(os.getenv('EMTC_WORKERS') or os.cpu_count() or 1)
EMTC_LOG_LEVEL = os.getenv('EMTC_LOG_LEVEL', 'INFO')

# Solver grid (0.1 us step and 5 ms window of the reference experiments)
DEFAULT_DT = float(os.getenv('EMTC_DT', '1e-7'))
DEFAULT_DURATION = float(os.getenv('EMTC_DURATION', '5e-3'))
MIN_FFT_SIZE = int(os.getenv('EMTC_MIN_FFT', str(2 ** 17)))
TAPER_FRACTION = 0.1
WRAP_SUPPRESSION = 1e-3
# Shortest record the location method is run on
MIN_RECORD_DURATION = 5e-3
# Samples kept ahead of the earliest possible wave arrival
CAUSAL_GUARD = 1

# Pre-calculation
DEFAULT_SPACING = float(os.getenv('EMTC_SPACING', '10'))
GFL_RESISTANCE = float(os.getenv('EMTC_GFL_RESISTANCE', '1.0'))
DEFAULT_TERMINATION = 10e3

POWER_FREQUENCY = float(os.getenv('EMTC_POWER_FREQUENCY', '50'))

# Fault classification
GROUND_THRESHOLD = float(os.getenv('EMTC_GROUND_THRESHOLD', '0.1'))
PHASE_THRESHOLD = float(os.getenv('EMTC_PHASE_THRESHOLD', '0.3'))
PAIR_BALANCE = 0.5
QUIET_PHASE = 0.05
NOISE_FLOOR = float(os.getenv('EMTC_NOISE_FLOOR', '1e-18'))

# TDOA baseline
TDOA_WINDOW = int(os.getenv('EMTC_TDOA_WINDOW', '10'))
TDOA_THRESHOLD = 0.01

BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIGS_FOLDER = os.path.join(BASE_DIR, 'configs')
DATABASES_FOLDER = os.getenv('EMTC_DATABASES_FOLDER') or os.path.join(BASE_DIR, 'databases')
