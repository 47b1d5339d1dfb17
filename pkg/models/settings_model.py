from __future__ import annotations

from typing import Any, Literal, Mapping

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from core.errors import ConfigurationError, UsageError


# ----------------------------------------------------------------------
# Pydantic schema's voor run-configuratie
# ----------------------------------------------------------------------
class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    @classmethod
    def build(cls, **values: Any):
        try:
            return cls(**values)
        except ValidationError as exc:
            raise ConfigurationError(f"invalid {cls.__name__}: {exc}") from exc


class ModelConfig(_Section):
    hidden_dim: int = Field(256, ge=1)
    graph_layers: int = Field(3, ge=1)
    classifier_hidden: int = Field(512, ge=1)
    classifier_layers: int = Field(3, ge=1)
    protein_dim: int = Field(64, ge=1)
    protein_channels: int = Field(8, ge=1)
    protein_kernel: int = Field(3, ge=1)
    conv_axis: Literal["feature", "residue"] = "feature"
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)

    @field_validator("protein_kernel")
    @classmethod
    def _odd_kernel(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError("protein_kernel must be odd")
        return value


class TrainConfig(_Section):
    epochs: int = Field(200, ge=1, le=200)
    lr: float = Field(0.001, ge=0.0)
    batch_size: int = Field(32, ge=1)
    l2_lambda: float = Field(0.001, ge=0.0)
    seed: int = 0
    patience: int = Field(20, ge=1)


class MCDropoutConfig(_Section):
    mc_samples: int = Field(30, ge=1)
    dropout_rate: float = Field(0.1, ge=0.0, lt=1.0)
    rng_seed: int = 0


class StubEmbedderConfig(_Section):
    stub_dim: int = Field(64, ge=1)
    stub_seed: int = 0


class NoiseConfig(_Section):
    sigmas: tuple[float, ...] = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5)
    seed: int = 0

    @field_validator("sigmas", mode="before")
    @classmethod
    def _split(cls, value: Any) -> Any:
        if isinstance(value, str):
            return tuple(float(part) for part in value.split(",") if part.strip())
        return value

    @field_validator("sigmas")
    @classmethod
    def _non_negative(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value:
            raise ValueError("at least one sigma is required")
        if any(sigma < 0 for sigma in value):
            raise ValueError("noise sigma must be >= 0")
        return value


# flat key in the config file -> (section, field)
FLAT_KEYS: dict[str, tuple[str, str]] = {
    **{name: ("model", name) for name in ModelConfig.model_fields if name != "dropout_rate"},
    **{name: ("train", name) for name in TrainConfig.model_fields},
    "mc_samples": ("mc", "mc_samples"),
    "rng_seed": ("mc", "rng_seed"),
    "stub_dim": ("stub", "stub_dim"),
    "stub_seed": ("stub", "stub_seed"),
    "sigmas": ("noise", "sigmas"),
    "noise_seed": ("noise", "seed"),
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    mc: MCDropoutConfig = MCDropoutConfig()
    stub: StubEmbedderConfig = StubEmbedderConfig()
    noise: NoiseConfig = NoiseConfig()

    @classmethod
    def from_flat(cls, values: Mapping[str, Any]) -> "RunConfig":
        """Build from flat ``key = value`` pairs; ``dropout_rate`` feeds both model and MC sampling."""
        sections: dict[str, dict[str, Any]] = {"model": {}, "train": {}, "mc": {}, "stub": {}, "noise": {}}
        for key, value in values.items():
            if value is None:
                continue
            if key == "dropout_rate":
                sections["model"]["dropout_rate"] = value
                sections["mc"]["dropout_rate"] = value
                continue
            if key not in FLAT_KEYS:
                raise UsageError(f"unknown config key {key!r}")
            section, name = FLAT_KEYS[key]
            sections[section][name] = value

        return cls(
            model=ModelConfig.build(**sections["model"]),
            train=TrainConfig.build(**sections["train"]),
            mc=MCDropoutConfig.build(**sections["mc"]),
            stub=StubEmbedderConfig.build(**sections["stub"]),
            noise=NoiseConfig.build(**sections["noise"]),
        )

    def flat(self) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for key, (section, name) in FLAT_KEYS.items():
            out[key] = getattr(getattr(self, section), name)
        out["dropout_rate"] = self.model.dropout_rate
        out["sigmas"] = list(self.noise.sigmas)
        return dict(sorted(out.items()))
