"""Exception types shared across the package."""


class FormatError(ValueError):
    """Malformed sequence, manifest, FASTA record or model file."""


class ConfigurationError(ValueError):
    """Inconsistent configuration, e.g. a model whose hash does not match a package."""


class TrainingError(RuntimeError):
    """Training produced a non-finite loss."""

    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss!r} at epoch {epoch}")
        self.epoch = epoch
        self.loss = loss
