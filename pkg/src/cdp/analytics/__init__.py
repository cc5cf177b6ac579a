from .strain import (  # noqa: F401
    ConsistencyReport,
    StrainProfile,
    name_consistency,
    nearest,
    profile_from_record,
    similarity,
)
