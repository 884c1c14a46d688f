"""Steganography in the mantissa bit planes of float32 HDR luminance images."""
from .cost_model import CostMap, correct, cost
from .float_plane import CapacityMap, FloatFields, PlaneStack, capacity, decompose, extract_planes, recompose, write_planes
from .image_io import extract_luminance, filter_by_capacity, read_cover, tile, write_cover
from .pipeline import StegoKey, embed, extract, simulate_embed
from .simulator import EmbeddingPlan, simulate, solve_lambda
from .stc import StcCode, stc_decode, stc_encode

__version__ = "0.1.0"
