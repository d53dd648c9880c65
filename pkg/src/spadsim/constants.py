# Sensor defaults. q and tau_d describe the modeled SPAD array; T and phi_max are
# starting points (the exposure is tuned per scene).
DEFAULT_Q = 0.45
DEFAULT_TAU_D = 150e-9  # seconds
DEFAULT_EXPOSURE = 1e-8  # seconds
DEFAULT_PHI_MAX = 1e8  # photons per second at intensity 255

# Sampler defaults
DEFAULT_SAMPLE_MODE = "EXACT_RENEWAL"
DEFAULT_ITERATION_CAP = 10_000_000

# Bisection bracket for auto-exposure, seconds
AUTO_EXPOSURE_BRACKET = (1e-12, 1e3)
AUTO_EXPOSURE_TOLERANCE = 1e-6

# Augmentation ranges, (low, high)
DEFAULT_ZOOM_RANGE = (0.8, 1.3)
DEFAULT_ROTATION_RANGE = (-25.0, 25.0)  # degrees
DEFAULT_SHEAR_RANGE = (-0.2, 0.2)

# Dataset defaults
DEFAULT_VARIANTS = 1
DEFAULT_LAYOUT = "paired"
DATASET_LAYOUTS = ("paired", "combined", "scenes")
DEFAULT_VAL_FRACTION = 0.05
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg")
LLFF_POSES_FILE = "poses_bounds.npy"
MANIFEST_FILE = "manifest.jsonl"
MANIFEST_VERSION = 1

# SSIM window and stabilizing constants for 8-bit data
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
DYNAMIC_RANGE = 255.0

# Run defaults
DEFAULT_SEED = 0
JOBS_ENV_VAR = "SPADSIM_JOBS"

# List of default colors
DEFAULT_COLORS = [
    "#4E79A7",  # deep blue
    "#F28E2B",  # orange
    "#E15759",  # red
    "#76B7B2",  # teal
    "#59A14F",  # green
    "#EDC948",  # yellow
]

# Channel colors for per-channel plots
CHANNEL_COLORS = ["#E15759", "#59A14F", "#4E79A7"]

# List of default monochrome colors (grayscale)
DEFAULT_MONOCHROME_COLORS = [
    "#000000",  # black
    "#444444",  # dark gray
    "#888888",  # gray
    "#BBBBBB",  # light gray
]

# Set the font size and family for matplotlib
FONT_SIZE = 12
FONT_FAMILY = "DejaVu Serif"
tfont = {"family": FONT_FAMILY, "size": FONT_SIZE}
afont = {"family": FONT_FAMILY, "size": FONT_SIZE - 2}
lfont = {"family": FONT_FAMILY, "size": FONT_SIZE + 2, "weight": "bold"}

# Toolkit version recorded in dataset manifests
TOOLKIT_VERSION = "0.1.0"
