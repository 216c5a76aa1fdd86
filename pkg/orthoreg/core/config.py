from pydantic import Field, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict


def _parse_floats(raw: str):
    return [float(item) for item in raw.split(",") if item.strip()]


class Settings(BaseSettings):
    """Runtime configuration loaded from ORTHOREG_* environment variables."""

    seed: int = Field(default=0)
    log_level: str = Field(default="INFO")
    output_dir: str = Field(default="runs")
    data_dir: str = Field(default="data/mnist")
    workers: int = Field(default=1, ge=1)
    toy_step_size: float = Field(default=0.003, gt=0)
    bound_step_size: float = Field(default=0.03, gt=0)
    gamma_grid: str = Field(default="0,0.1,1")
    lambda_grid: str = Field(default="1,5,10,20,50")

    model_config = SettingsConfigDict(
        env_prefix="ORTHOREG_", env_file=".env", env_file_encoding="utf-8"
    )

    @field_validator("gamma_grid", "lambda_grid")
    @classmethod
    def _numeric_grid(cls, value, info):
        try:
            values = _parse_floats(value)
        except ValueError as exc:
            message = f"{info.field_name} must be comma-separated numbers"
            raise ValueError(message) from exc
        if not values:
            raise ValueError(f"{info.field_name} must list at least one value")
        return value

    def gamma_grid_values(self):
        return _parse_floats(self.gamma_grid)

    def lambda_grid_values(self):
        return _parse_floats(self.lambda_grid)
