"""vqtk: vector quantization, finite scalar quantization, codebook learning and
generative-tokenizer evaluation over file-based feature maps."""

__version__ = "1.0.0"
