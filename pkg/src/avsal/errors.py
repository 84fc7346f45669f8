class ConfigError(ValueError):
    """Invalid scene spec or training configuration. ``field`` names the culprit."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class ShapeError(ValueError):
    pass


class DatasetError(IOError):
    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = str(path)
