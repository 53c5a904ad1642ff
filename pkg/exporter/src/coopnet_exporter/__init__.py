"""Training and export companion for the two-arm inference engine.

Trains a float CNN and an XNOR-style binary CNN on a small task, quantizes
them to the engine's int8/binary schemes, and writes a bundle the engine can
load and cross-validate: model.cpnt, golden.cpgv, images.idx, labels.idx,
metadata.json. File formats follow the engine's FORMAT.md exactly; no code is
shared with the engine.
"""

from .export import ExportBundle, ExportError, train_and_export

__version__ = "0.1.0"
