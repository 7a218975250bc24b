"""Run configuration shared by the command line and the HTTP API"""
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from exceptions import ConfigError
from models.kernel import KernelFamily

Command = Literal["dist", "gwss", "gwpca", "gwr", "gwr-select", "gwr-lcr", "gwr-collin", "gwr-predict"]
COMMANDS = ["dist", "gwss", "gwpca", "gwr", "gwr-select", "gwr-lcr", "gwr-collin", "gwr-predict"]

# Commands whose bandwidth may be chosen by an objective
AUTO_BANDWIDTH_COMMANDS = {"gwr", "gwr-lcr", "gwr-collin", "gwr-predict", "gwpca"}
REGRESSION_COMMANDS = {"gwr", "gwr-select", "gwr-lcr", "gwr-collin", "gwr-predict"}


class RunConfig(BaseModel):
    """Everything one model run needs apart from the data itself"""
    model_config = ConfigDict(populate_by_name=True)

    command: Command = Field(..., description="Model to run")
    input: Optional[str] = Field(None, description="Input CSV path (CLI only)")
    x: str = Field("x", description="Easting / longitude column")
    y: str = Field("y", description="Northing / latitude column")
    geographic: bool = Field(False, description="Coordinates are lon/lat degrees; use great-circle distances")
    dependent: Optional[str] = Field(None, description="Dependent variable (regression commands)")
    vars: List[str] = Field(default_factory=list, description="Independent / analysis variables")
    kernel: KernelFamily = Field(KernelFamily.BISQUARE, description="Kernel family")
    bw: Optional[Union[float, Literal["auto"]]] = Field(None, description="Bandwidth value or 'auto'")
    adaptive: bool = Field(False, description="Bandwidth is a nearest-neighbour count")
    criterion: Literal["cv", "aicc"] = Field("aicc", description="Bandwidth objective for GW regression")
    k: int = Field(2, description="Retained components (gwpca)")
    robust: Literal["none", "filtered", "iterative", "mcd"] = Field("none", description="Robust variant")
    cn_thresh: float = Field(30.0, description="Local condition number threshold (gwr-lcr, gwr-collin)")
    adjust: bool = Field(False, description="Locally compensate the ridge where CN > cn_thresh")
    lambda_: float = Field(0.0, alias="lambda", description="User ridge applied everywhere when not adjusting")
    quantiles: bool = Field(False, description="Add local medians, IQRs and QIs (gwss)")
    standardize: bool = Field(False, description="Z-score the variables before gwpca")
    refine: bool = Field(False, description="Re-select the bandwidth for every stepwise model")
    predict_input: Optional[str] = Field(None, description="Target locations CSV (gwr-predict)")
    out: Optional[str] = Field(None, description="Output path (stdout when omitted)")
    format: Literal["csv", "geojson"] = Field("csv", description="Output format")
    seed: int = Field(42, description="Seed for the robust PCA subset search")
    threads: Optional[int] = Field(None, description="Worker threads (default: configured)")
    dist_cache: Optional[str] = Field(None, description="Distance matrix cache file (dist; reused when its shape matches)")
    earth_radius: Optional[float] = Field(None, description="Great-circle sphere radius in meters")
    power: float = Field(2.0, description="Minkowski power")
    stream: bool = Field(False, description="Compute distance rows on demand")

    @field_validator("vars", mode="before")
    @classmethod
    def _split_vars(cls, value):
        if isinstance(value, str):
            return [name.strip() for name in value.split(",") if name.strip()]
        return value

    @field_validator("bw", mode="before")
    @classmethod
    def _parse_bw(cls, value):
        if isinstance(value, str):
            text = value.strip().lower()
            if text == "auto":
                return "auto"
            try:
                return float(text)
            except ValueError:
                raise ConfigError(f"Bandwidth must be a number or 'auto', got '{value}'", bw=value)
        return value

    @property
    def auto_bandwidth(self) -> bool:
        return self.bw == "auto"

    @property
    def bandwidth(self) -> Optional[float]:
        return None if self.bw is None or self.auto_bandwidth else float(self.bw)

    @model_validator(mode="after")
    def _check_command(self) -> "RunConfig":
        command = self.command
        if command == "dist":
            return self
        if not self.vars:
            raise ConfigError(f"'{command}' needs --vars")
        if command in REGRESSION_COMMANDS and not self.dependent:
            raise ConfigError(f"'{command}' needs --dependent")
        if self.kernel is not KernelFamily.GLOBAL:
            if self.bw is None:
                raise ConfigError(f"'{command}' needs --bw (a value or 'auto')")
            if self.auto_bandwidth:
                allowed = command in AUTO_BANDWIDTH_COMMANDS or (command == "gwr-select" and self.refine)
                if not allowed:
                    raise ConfigError(f"'{command}' does not support --bw auto; give an explicit bandwidth")
        if self.robust == "mcd" and command != "gwpca":
            raise ConfigError("--robust mcd applies to gwpca only")
        if self.robust in ("filtered", "iterative") and command != "gwr":
            raise ConfigError(f"--robust {self.robust} applies to gwr only")
        if command == "gwr-select" and self.format == "geojson":
            raise ConfigError("gwr-select reports models, not locations; use --format csv")
        if self.lambda_ < 0:
            raise ConfigError("--lambda must be non-negative")
        return self
