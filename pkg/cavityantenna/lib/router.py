from typing import Callable, List, Optional, Tuple


class Router:
    """
    Registry of command handlers and the middleware that wraps them.
    Handlers take (config, writer); routers can be mounted into each other.
    """
    def __init__(self, prefix: str = ''):
        self.commands: List[Tuple[str, Callable]] = []
        self.middleware: List[Callable] = []
        self.prefix = prefix

    def _add_command(self, name: str, handler: Callable):
        full_name = f"{self.prefix}{name}"
        self.commands = [(n, h) for n, h in self.commands if n != full_name]
        self.commands.append((full_name, handler))
        return self

    def command(self, name: str, handler: Callable = None):
        """Register `handler` under `name`; without a handler, use as a decorator"""
        if handler is None:
            def decorator(func):
                self._add_command(name, func)
                return func
            return decorator
        return self._add_command(name, handler)

    def use(self, middleware_or_router=None):
        """
        Mount middleware, or merge another router's commands and middleware.
        Without an argument, use as a decorator for middleware.
        """
        if middleware_or_router is None:
            def decorator(middleware_func):
                self.middleware.append(middleware_func)
                return middleware_func
            return decorator

        if isinstance(middleware_or_router, Router):
            for name, handler in middleware_or_router.commands:
                self._add_command(name, handler)
            self.middleware.extend(middleware_or_router.middleware)
            return self

        if callable(middleware_or_router):
            self.middleware.append(middleware_or_router)
            return self

        raise TypeError('use() expects middleware or a Router')

    @property
    def command_names(self) -> List[str]:
        return [name for name, _ in self.commands]

    def find_command(self, name: str) -> Optional[Callable]:
        for command_name, handler in self.commands:
            if command_name == name:
                return handler
        return None
