import os
from typing import Any, Dict, Optional

import jinja2


class TemplateEngine:
    """
    Template engine interface for text reports
    """
    def __init__(self, templates_dir: Optional[str] = None):
        self.templates_dir = templates_dir

    def render(self, template_name: str, context: Dict[str, Any]) -> str:
        raise NotImplementedError("Template engine must implement render method")


class Jinja2Engine(TemplateEngine):
    """
    Jinja2 engine; loads the package templates unless a directory is given
    """
    def __init__(self, templates_dir: Optional[str] = None, **options):
        super().__init__(templates_dir)

        self.options = {
            'autoescape': False,
            'extensions': [],
            'trim_blocks': True,
            'lstrip_blocks': True,
            'keep_trailing_newline': True,
        }
        self.options.update(options)
        self.env = self._create_environment()

    def _create_environment(self) -> jinja2.Environment:
        if self.templates_dir is None:
            loader = jinja2.PackageLoader('cavityantenna', 'templates')
        else:
            if not os.path.isdir(self.templates_dir):
                raise FileNotFoundError(f"template directory {self.templates_dir} does not exist")
            loader = jinja2.FileSystemLoader(self.templates_dir)

        env = jinja2.Environment(
            loader=loader,
            undefined=jinja2.StrictUndefined,
            autoescape=self.options['autoescape'],
            extensions=self.options['extensions'],
            trim_blocks=self.options['trim_blocks'],
            lstrip_blocks=self.options['lstrip_blocks'],
            keep_trailing_newline=self.options['keep_trailing_newline'],
        )
        env.filters['sig'] = lambda value, digits=4: f"{value:.{digits}g}" if value is not None else '-'
        return env

    def render(self, template_name: str, context: Dict[str, Any]) -> str:
        template = self.env.get_template(template_name)
        return template.render(**context)


default_engine = None


def create_engine(engine_type: str = 'jinja2', templates_dir: Optional[str] = None, **options) -> TemplateEngine:
    """
    Create and configure a template engine; the first one created becomes the default
    """
    global default_engine

    if engine_type == 'jinja2':
        engine = Jinja2Engine(templates_dir, **options)
    else:
        raise ValueError(f"Unsupported template engine: {engine_type}")

    if default_engine is None:
        default_engine = engine

    return engine


def get_default_engine() -> TemplateEngine:
    """
    The default engine, created on first use
    """
    if default_engine is None:
        create_engine()
    return default_engine
