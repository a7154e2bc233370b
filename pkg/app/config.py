from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    ENVIRONMENT: str = "development"
    PORT: int = 8000
    HOST: str = "0.0.0.0"
    LOG_LEVEL: str = "INFO"

    # Numerical Tolerance Conf
    HERMITIAN_TOL: float = 1e-12
    EIGEN_TOL: float = 1e-10
    TRACE_TOL: float = 1e-12
    CERT_TOL: float = 1e-8  # below this a product expectation counts as a violation
    SKEW_RANK_TOL: float = 1e-10  # relative to the largest singular value
    BOUND_TOL: float = 1e-10

    # See-saw Certification Conf
    SEESAW_RESTARTS: int = 200
    SEESAW_MAX_ITERS: int = 500
    SEESAW_TOL: float = 1e-12
    MAX_WORKERS: int = 4

    # Sampling Conf
    SEED: int = 0  # WITNESSKIT_SEED
    KERNEL_BUDGET_FACTOR: int = 4
    MAP_PROBE_SAMPLES: int = 1000
    SWEEP_DRAWS: int = 1000

    model_config = SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="WITNESSKIT_", extra="ignore"
    )

    def tolerances(self) -> dict:
        """Tolerance block embedded in every emitted report."""
        return {
            "hermitian": self.HERMITIAN_TOL,
            "eigen": self.EIGEN_TOL,
            "trace": self.TRACE_TOL,
            "cert": self.CERT_TOL,
            "skew_rank": self.SKEW_RANK_TOL,
            "bound": self.BOUND_TOL,
        }


settings = Settings()
