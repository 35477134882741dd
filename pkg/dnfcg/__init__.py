__version__ = '0.1.0'

from . import analysis, filters, io, lp, master, predictor, pricing, process, synth, trainer, utils
