from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator


class ModelConfig(BaseModel):
    """
    Hyperparameters shared by every predictor variant. C defaults to M + T.

    Widths are desk-scale: d_model and gcn_hidden default to 64. Full-size
    runs set d_model=256 in the experiment file.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    J: int = Field(18, ge=1, description="joints per person")
    M: int = Field(10, ge=1, description="key/query window length (frames)")
    T: int = Field(10, ge=1, description="frames predicted per forward pass")
    C: int = Field(20, ge=1, description="DCT coefficients per trajectory")
    d_model: int = Field(64, ge=1)
    gcn_layers: int = Field(4, ge=2)
    gcn_hidden: int = Field(64, ge=1)
    heads_key: int = Field(8, ge=1)
    heads_value: int = Field(1, ge=1)
    # Coordinates enter learned layers in metres.
    input_scale: float = Field(1e-3, gt=0)

    @model_validator(mode="before")
    @classmethod
    def _default_coeffs(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("C") is None:
            fields = cls.model_fields
            M = data.get("M", fields["M"].default)
            T = data.get("T", fields["T"].default)
            data = {**data, "C": int(M) + int(T)}
        return data

    @model_validator(mode="after")
    def _check_extents(self) -> "ModelConfig":
        if self.C > self.M + self.T:
            raise ValueError(f"C={self.C} exceeds the value window length M + T = {self.M + self.T}")
        if self.d_model % self.heads_key:
            raise ValueError(f"heads_key={self.heads_key} must divide d_model={self.d_model}")
        if self.value_dim % self.heads_value:
            raise ValueError(f"heads_value={self.heads_value} must divide the value width {self.value_dim}")
        return self

    @property
    def window_length(self) -> int:
        return self.M + self.T

    @property
    def nodes(self) -> int:
        return self.J * 3

    @property
    def value_dim(self) -> int:
        return self.C * self.nodes

    @property
    def query_dim(self) -> int:
        return self.M * self.nodes

    def with_joints(self, num_joints: int) -> "ModelConfig":
        return ModelConfig(**{**self.model_dump(), "J": num_joints})
