import pytest  # noqa
import json
from unittest.mock import MagicMock, patch

from cavityantenna import Application, Router, RunConfig, cavityantenna
from cavityantenna.lib.errors import ConvergenceError, DomainError, ExitStatus
from cavityantenna.lib.middleware import Middleware
from cavityantenna.lib.request import COMMANDS
from cavityantenna.lib.response import ResultWriter
from cavityantenna.lib.settings import Settings
from tests.conftest import stack_path


@pytest.fixture
def settings():
    return Settings(threads=1, log_level='WARNING')


def test_cavityantenna_instance(settings):
    """Test the creation of an application with every command mounted."""
    app = cavityantenna(settings)
    assert isinstance(app, Application)
    assert sorted(app.command_names) == sorted(COMMANDS)
    assert len(app.middleware) == 3
    assert app.get('threads') == 1


def test_settings_chain(settings):
    """Test that set() chains and overrides a setting."""
    app = Application(settings)
    assert app.set('threads', 4).set('log_level', 'ERROR') is app
    assert app.get('threads') == 4
    assert app.get('missing', 'x') == 'x'


def test_resolve_fills_unset_options(settings):
    """Test that run options fall back to the application settings."""
    app = Application(settings.updated(material_dir='/tmp/materials'))
    config = app.resolve(RunConfig(command='xi'))
    assert config.threads == 1
    assert config.material_dir == '/tmp/materials'
    explicit = app.resolve(RunConfig(command='xi', threads=8))
    assert explicit.threads == 8


class TestRun:
    """Tests for running one command through the application."""

    def test_handler_is_called(self, settings, tmp_path):
        """Test that the registered handler receives config and writer."""
        app = Application(settings)
        handler = MagicMock()
        app.command('xi', handler)
        config = RunConfig(command='xi', output_dir=str(tmp_path))
        writer = app.run(config)
        handler.assert_called_once_with(config, writer)
        assert writer.status_code == ExitStatus.OK

    def test_missing_handler(self, settings, tmp_path):
        """Test that a command without a handler is a validation error."""
        writer = Application(settings).run(RunConfig(command='xi', output_dir=str(tmp_path)))
        assert writer.status_code == ExitStatus.VALIDATION_ERROR

    def test_exit_status_mapping(self, settings, tmp_path):
        """Test the exit status of failing commands."""
        app = Application(settings)
        app.command('spectrum', MagicMock(side_effect=ConvergenceError('peak not resolved', n_eff=2.3)))
        app.command('xi', MagicMock(side_effect=DomainError('NA above n_upper')))
        spectrum = app.run(RunConfig(command='spectrum', output_dir=str(tmp_path)))
        xi = app.run(RunConfig(command='xi', output_dir=str(tmp_path)))
        assert spectrum.status_code == ExitStatus.NON_CONVERGENCE
        assert xi.status_code == ExitStatus.VALIDATION_ERROR

    def test_writer_is_finished(self, settings, tmp_path):
        """Test that the writer is closed after the run."""
        app = Application(settings)
        app.command('budget', lambda config, writer: writer.json('budget.json', {'total': 1.0}))
        writer = app.run(RunConfig(command='budget', output_dir=str(tmp_path)), ResultWriter(str(tmp_path)))
        assert (tmp_path / 'budget.json').exists()
        with pytest.raises(RuntimeError):
            writer.json('late.json', {})


class TestMiddleware:
    """Tests for the default middleware."""

    def test_order(self, settings, tmp_path):
        """Test that middleware wraps the handler in mount order."""
        app = Application(settings)
        calls = []

        def outer(config, writer, next):
            calls.append('outer')
            next()
            calls.append('outer done')

        def inner(config, writer, next):
            calls.append('inner')
            next()

        app.use(outer)
        app.use(inner)
        app.command('xi', lambda config, writer: calls.append('handler'))
        app.run(RunConfig(command='xi', output_dir=str(tmp_path)))
        assert calls == ['outer', 'inner', 'handler', 'outer done']

    def test_error_handler(self, settings, tmp_path, capsys):
        """Test that errors become an exit status and a message."""
        app = Application(settings)
        app.use(Middleware.error_handler())
        app.command('xi', MagicMock(side_effect=ConvergenceError('no convergence')))
        writer = app.run(RunConfig(command='xi', output_dir=str(tmp_path)))
        assert writer.status_code == ExitStatus.NON_CONVERGENCE
        assert 'xi: numerical non-convergence: no convergence' in capsys.readouterr().err

    def test_manifest_after_failure(self, settings, tmp_path):
        """Test that the manifest is written even when the command fails."""
        app = Application(settings)
        app.use(Middleware.manifest())
        app.use(Middleware.error_handler())
        app.command('xi', MagicMock(side_effect=DomainError('bad aperture')))
        app.run(RunConfig(command='xi', stack_file=stack_path('caseI.json'), output_dir=str(tmp_path)))

        manifest = json.loads((tmp_path / 'manifest.json').read_text())
        assert manifest['status'] == ExitStatus.VALIDATION_ERROR
        assert manifest['config']['command'] == 'xi'
        assert 'silver-literature' in manifest['materials']

    def test_manifest_without_stack(self, settings, tmp_path):
        """Test the manifest of a command that reads no stack."""
        app = Application(settings)
        app.use(Middleware.manifest())
        app.command('fit-line', lambda config, writer: writer.send({'center_nm': 619.0}))
        app.run(RunConfig(command='fit-line', output_dir=str(tmp_path)))

        manifest = json.loads((tmp_path / 'manifest.json').read_text())
        assert manifest['materials'] == {}
        assert manifest['summary'] == {'center_nm': 619.0}

    def test_logger(self, settings, tmp_path):
        """Test the one-line log per command."""
        app = Application(settings)
        app.use(Middleware.logger(':command -> :status'))
        app.command('budget', MagicMock())
        with patch('cavityantenna.lib.middleware.logger') as mock_logger:
            app.run(RunConfig(command='budget', output_dir=str(tmp_path)))
        mock_logger.info.assert_called_once_with('budget -> 0')


class TestRouter:
    """Tests for the command registry."""

    def test_decorator(self):
        """Test registering a handler with the decorator."""
        router = Router()

        @router.command('xi')
        def xi_handler(config, writer):
            """Collection factor"""

        assert router.find_command('xi') is xi_handler
        assert router.find_command('modes') is None
        assert router.command_names == ['xi']

    def test_reregistration_replaces(self):
        """Test that a name maps to its latest handler."""
        router = Router()
        first, second = MagicMock(), MagicMock()
        router.command('xi', first).command('xi', second)
        assert router.command_names == ['xi']
        assert router.find_command('xi') is second

    def test_mount_router(self):
        """Test merging commands and middleware of another router."""
        child = Router(prefix='fit-')
        child.command('line', MagicMock())
        middleware = MagicMock()
        child.use(middleware)

        parent = Router()
        parent.use(child)
        assert parent.command_names == ['fit-line']
        assert parent.middleware == [middleware]

    def test_use_decorator(self):
        """Test registering middleware with the decorator."""
        router = Router()

        @router.use()
        def timing(config, writer, next):
            next()

        assert router.middleware == [timing]

    def test_use_rejects_other_values(self):
        """Test that only callables and routers can be mounted."""
        with pytest.raises(TypeError):
            Router().use(42)
