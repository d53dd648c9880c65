from .io import load as load
from .io import read_rgb as read_rgb
from .io import save as save
from .io import write_png as write_png
