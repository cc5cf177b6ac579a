from .app import App, Request, Response, serve  # noqa: F401
from .policy import ROUTES, AccessPolicy  # noqa: F401
from .tokens import TokenPair, TokenStore  # noqa: F401
