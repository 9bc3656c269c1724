import tomllib
from pathlib import Path
from typing import Annotated, Any, Literal, Self, TypedDict, cast

from pydantic import AfterValidator, BaseModel, BeforeValidator, Field, ValidationError, ValidationInfo, model_validator
from pydantic.types import PathType
from rich.console import Console
from rich.markup import escape

from passlog.audio_io import BitDepth
from passlog.parsing import parse_float_list, parse_time_ranges
from passlog.type_defs import PassByEvent, TimeRange

CONSOLE = Console(stderr=True)

CONFIG_FILE_NAME = "passlog.toml"


class _ConfigValidationContext(TypedDict):
    paths_relative_to: Path


def _relative_to_config(path: Path, info: ValidationInfo) -> Path:
    context = cast(_ConfigValidationContext | None, info.context)
    return context["paths_relative_to"] / path if context and not path.is_absolute() else path


class _RelativeToPathType(PathType):
    @classmethod
    def validate_file(cls, path: Path, info: ValidationInfo) -> Path:  # pyright: ignore[reportIncompatibleMethodOverride]
        return super().validate_file(_relative_to_config(path, info), info)


# Output locations: resolved like input files, but they need not exist yet
_OutputPath = Annotated[Path, AfterValidator(_relative_to_config)]


def _time_ranges(value: Any) -> Any:
    return parse_time_ranges(value) if isinstance(value, str) else value


def _float_list(value: Any) -> Any:
    return parse_float_list(value) if isinstance(value, str) else value


class DetectorConfig(BaseModel, frozen=True, extra="forbid"):
    t_c_s: float = Field(default=3.0, gt=0)
    sigma_s: float = Field(default=1.0, gt=0)  # t_c / 3 unless given
    q: float = Field(default=1.5, gt=0)
    decimation: int = Field(default=480, ge=1)
    noise_ranges: Annotated[list[TimeRange], BeforeValidator(_time_ranges)] = Field(default_factory=list)
    auto_noise: bool = False
    auto_noise_block_s: float = Field(default=1.0, gt=0)
    refractory_s: float = Field(default=0.0, ge=0)
    backend: Literal["fast", "direct"] = "fast"

    @model_validator(mode="before")
    @classmethod
    def _default_sigma(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("sigma_s") is None:  # pyright: ignore[reportUnknownMemberType]
            data = cast(dict[str, Any], data)
            return {**data, "sigma_s": float(data.get("t_c_s", 3.0)) / 3}
        return data

    @model_validator(mode="after")
    def _check_noise_ranges(self) -> Self:
        if not self.noise_ranges and not self.auto_noise:
            raise ValueError("No noise sections given: pass noise ranges or enable auto_noise")

        previous_end = float("-inf")
        for start, end in sorted(self.noise_ranges):
            if start < 0 or end <= start:
                raise ValueError(f"Invalid noise range {start}:{end} (need 0 <= start < end)")
            if start < previous_end:
                raise ValueError(f"Noise range {start}:{end} overlaps the previous one")
            previous_end = end
        return self


class SynthConfig(BaseModel, frozen=True, extra="forbid"):
    duration_s: float = Field(gt=0)
    sample_rate_hz: float = Field(default=48000.0, gt=0)
    events: list[PassByEvent] = Field(default_factory=list)
    noise_amplitude: float = Field(default=0.01, ge=0)
    rng_seed: int = 0

    @model_validator(mode="after")
    def _check_events_in_recording(self) -> Self:
        for event in self.events:
            if not 0 <= event.t0_s <= self.duration_s:
                raise ValueError(f"Pass-by at {event.t0_s} s lies outside the recording (0 to {self.duration_s} s)")
        return self


class Settings(BaseModel, extra="forbid"):
    """Flat key-value settings: one key per CLI flag (except --config), as found in a config file."""

    output: _OutputPath | None = None
    verbose: bool | None = None

    # detection
    t_c: float | None = None
    sigma: float | None = None
    q: float | None = None
    decimation: int | None = None
    noise: str | list[TimeRange] | None = None
    auto_noise: bool | None = None
    refractory: float | None = None
    backend: Literal["fast", "direct"] | None = None
    trace: _OutputPath | None = None
    q_sweep: Annotated[list[float], BeforeValidator(_float_list)] | None = None
    sigma_sweep: Annotated[list[float], BeforeValidator(_float_list)] | None = None
    # synthesis
    duration: float | None = None
    sample_rate: float | None = None
    noise_amplitude: float | None = None
    seed: int | None = None
    events: Annotated[Path, _RelativeToPathType("file")] | None = None
    count: int | None = None
    min_gap: float | None = None
    bit_depth: BitDepth | None = None
    # evaluation
    tolerance: float | None = None
    counts: str | None = None

    def merged(self, **flags: Any) -> "Settings":
        """Flags given on the command line (not None) override file values."""
        return self.model_copy(update={key: value for key, value in flags.items() if value is not None})

    def detector_values(self) -> dict[str, Any]:
        values = {
            "t_c_s": self.t_c,
            "sigma_s": self.sigma,
            "q": self.q,
            "decimation": self.decimation,
            "noise_ranges": self.noise,
            "auto_noise": self.auto_noise,
            "refractory_s": self.refractory,
            "backend": self.backend,
        }
        return {key: value for key, value in values.items() if value is not None}


class RunConfig(BaseModel, frozen=True):
    """Effective configuration of one CLI run, echoed in its reports."""

    command: Literal["synth", "detect", "eval"]
    input: Path | None = None
    output: Path | None = None
    truth: Path | None = None
    detector: DetectorConfig | None = None
    synth: SynthConfig | None = None
    bit_depth: BitDepth | None = None
    tolerance_s: float | None = None


def locate_config(dir: Path) -> Path | None:
    config_file = (dir / CONFIG_FILE_NAME).resolve()
    return config_file if config_file.exists() and config_file.is_file() else None


ERROR_MESSAGES = {
    "extra_forbidden": "Unknown configuration key",
    "path_type": "Value must be a valid path",
    "path_not_file": "Path does not point to a file",
    "greater_than": "Value must be positive",
}


def _report_toml_parsing_error(config_file: Path, exc: Exception) -> None:
    CONSOLE.print(":boom: Could not parse configuration file!", style="bold red")
    CONSOLE.print(f"   Trying to parse: {config_file}", style="bright_black")
    CONSOLE.print(f"   Got {type(exc).__name__}: {exc}", style="bright_black")


def report_config_validation_errors(source: str, exc: ValidationError) -> None:
    CONSOLE.print(
        f":boom: {exc.error_count()} error(s) found in configuration:",
        style="bold red",
        highlight=False,
    )
    CONSOLE.print(f"   Source: {source}", style="bright_black")
    for error in exc.errors():
        loc = ".".join(str(p) for p in error["loc"]) or "(config)"
        message = escape(ERROR_MESSAGES.get(error["type"], f'{error["msg"]} [{error["type"]}]'))
        _input = error["input"]
        value = escape(_input) if isinstance(_input, str) else _input
        CONSOLE.print(f"   * {loc}: {message} (got: {value!r})", style="red")


def settings_from_file(config_file: Path) -> Settings:
    """Read flat passlog settings from a TOML file."""
    config_file = config_file.resolve()
    try:
        with open(config_file, "rb") as fh:
            data = tomllib.load(fh)
    except Exception as exc:
        _report_toml_parsing_error(config_file, exc)
        raise SystemExit(1)

    try:
        return Settings.model_validate(data, context=_ConfigValidationContext(paths_relative_to=config_file.parent))
    except ValidationError as exc:
        report_config_validation_errors(str(config_file), exc)
        raise SystemExit(1)


def load_settings(config_file: Path | None) -> Settings:
    if not config_file:
        config_file = locate_config(Path.cwd())
    return settings_from_file(config_file) if config_file else Settings()


def validated[M: BaseModel](model: type[M], values: dict[str, Any], source: str = "command line / config file") -> M:
    try:
        return model.model_validate(values)
    except ValidationError as exc:
        report_config_validation_errors(source, exc)
        raise SystemExit(1)
