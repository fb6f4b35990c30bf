import pytest
import trio

from logging import getLogger

from rfidcheck.base import AsyncApp, BaseApp
from rfidcheck.configurator import (
    AppConfigurator,
    ConfigurationFormat,
    is_configuration_key,
)
from rfidcheck.errors import ApplicationExit


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("RFIDCHECK_SETTINGS", raising=False)
    return tmp_path


def _configurator(**kwds) -> AppConfigurator:
    kwds.setdefault("package_name", "rfidcheck")
    return AppConfigurator({}, log=getLogger("rfidcheck.tests"), **kwds)


def test_defaults_come_from_the_package():
    configurator = _configurator()
    assert configurator.configure()

    config = configurator.result
    assert config["SEED"] == 20240229
    assert config["SOLVER"]["method"] == "gauss-seidel"
    assert config["SWEEP"] == {"workers": 4}
    assert not configurator.loaded_files


def test_defaults_are_copied():
    first = _configurator()
    first.configure()
    first.result["SOLVER"]["method"] = "direct"

    second = _configurator()
    second.configure()
    assert second.result["SOLVER"]["method"] == "gauss-seidel"


def test_sections_are_merged_and_other_keys_replaced(workdir):
    path = workdir / "settings.toml"
    path.write_text(
        'STATE_LIMIT = 1000\nlowercase = 1\n\n[SOLVER]\nmethod = "jacobi"\n'
    )
    configurator = _configurator()
    assert configurator.configure(str(path))

    config = configurator.result
    assert config["STATE_LIMIT"] == 1000
    assert config["SOLVER"] == {
        "method": "jacobi",
        "tolerance": 1e-8,
        "max_iterations": 1_000_000,
    }
    assert "lowercase" not in config
    assert [f.format for f in configurator.loaded_files] == [ConfigurationFormat.TOML]


@pytest.mark.parametrize(
    "name, text",
    [
        ("settings.json", '{"SEED": 7}'),
        ("settings.jsonc", '# seed of the sweep\n{"SEED": 7, // inline\n}'),
        ("settings.json5", "{SEED: 7, COSTS: {tag_hash: 2}}"),
    ],
)
def test_json_formats(workdir, name, text):
    (workdir / name).write_text(text)
    configurator = _configurator()
    assert configurator.configure(name)
    assert configurator.result["SEED"] == 7
    assert configurator.result["COSTS"]["tx_forward"] == 3.0


def test_python_files_need_unsafe_mode(workdir):
    (workdir / "settings.py").write_text("SEED = 3 * 5\nhelper = 1\n")

    safe = _configurator()
    assert not safe.configure("settings.py")
    assert safe.result["SEED"] == 20240229

    unsafe = _configurator(safe=False)
    assert unsafe.configure("settings.py")
    assert unsafe.result["SEED"] == 15
    assert "helper" not in unsafe.result


def test_unknown_formats_are_refused(workdir):
    (workdir / "settings.yaml").write_text("SEED: 1\n")
    assert not _configurator().configure("settings.yaml")


def test_missing_files(workdir):
    assert not _configurator().configure("missing.toml")
    assert _configurator(default_filename="rfidcheck.toml").configure()


def test_default_file_is_picked_up(workdir):
    (workdir / "rfidcheck.json").write_text('{"SEED": 11}')
    configurator = _configurator(
        default_filename=("rfidcheck.toml", "rfidcheck.json")
    )
    assert configurator.configure()
    assert configurator.result["SEED"] == 11
    assert configurator.loaded_files[0].name == str(workdir / "rfidcheck.json")


def test_environment_variable_is_loaded_last(workdir, monkeypatch):
    (workdir / "first.toml").write_text("SEED = 1\nSTATE_LIMIT = 10\n")
    (workdir / "second.toml").write_text("SEED = 2\n")
    monkeypatch.setenv("RFIDCHECK_SETTINGS", "second.toml")

    configurator = _configurator(environment_variable="RFIDCHECK_SETTINGS")
    assert configurator.configure("first.toml")
    assert configurator.result["SEED"] == 2
    assert configurator.result["STATE_LIMIT"] == 10
    assert len(configurator.loaded_files) == 2


def test_configuration_keys():
    assert is_configuration_key("SOLVER")
    assert not is_configuration_key("solver")
    assert not is_configuration_key("_HIDDEN")


class _App(AsyncApp):
    def __init__(self, ready):
        self._ready = ready
        super().__init__("testapp", "rfidcheck")

    async def ready(self):
        return await self._ready(self)


def test_app_names():
    with pytest.raises(ValueError):
        BaseApp("rfid check", "rfidcheck")

    app = BaseApp("rfidcheck", "rfidcheck", full_name="RFID model checker")
    assert app.app_name == "rfidcheck"
    assert app.app_full_name == "RFID model checker"
    assert app.version == "0.1.0"
    assert app.log.name == "rfidcheck"


def test_configurator_is_available_after_prepare(workdir):
    app = BaseApp("rfidcheck", "rfidcheck")
    with pytest.raises(RuntimeError):
        app.configurator

    assert app.prepare(debug=True) is None
    assert app.debug
    assert app.config["STATE_LIMIT"] == 5_000_000
    assert app.configurator.result is app.config

    assert BaseApp("rfidcheck", "rfidcheck").prepare("missing.toml") == 2


def test_exit_codes_of_async_apps():
    async def finish(app):
        return None

    async def fail(app):
        return 1

    async def request_exit(app):
        raise ApplicationExit("stopping", exit_code=5)

    async def interrupt(app):
        raise KeyboardInterrupt

    assert trio.run(_App(finish).run) == 0
    assert trio.run(_App(fail).run) == 1
    assert trio.run(_App(request_exit).run) == 5
    assert trio.run(_App(interrupt).run) == 130


def test_exit_requests_from_worker_nurseries():
    async def raise_in_child(app):
        async def worker():
            await trio.sleep(0)
            raise ApplicationExit("worker failed", exit_code=3)

        async with trio.open_nursery() as nursery:
            nursery.start_soon(worker)

    assert trio.run(_App(raise_in_child).run) == 3
