from _nnscope import (  # noqa: F401
    ConfigError,
    ContractError,
    IoError,
    ShapeError,
    SpecError,
    builtin_dataset,
    mutate,
    train,
)

__all__ = [
    "train",
    "mutate",
    "builtin_dataset",
    "ContractError",
    "ShapeError",
    "SpecError",
    "ConfigError",
    "IoError",
]
