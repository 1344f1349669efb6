"""DNA storage codec: Reed-Solomon pre-coding, learned or identity transcoding, sequence analysis."""

__version__ = "0.1.0"
