from .anonymise import AnonymisationPolicy, anonymise  # noqa: F401
from .service import HospitalService  # noqa: F401
