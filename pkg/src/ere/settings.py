from pydantic_settings import BaseSettings, SettingsConfigDict

from ere.enums import GridSizeRule


class GlmSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="glm_")

    MAX_ITER: int = 100
    REL_TOL: float = 1e-10  # относительное изменение loglik между итерациями
    GRAD_TOL: float = 1e-8  # норма градиента / max(1, |loglik|)
    MAX_HALVINGS: int = 20
    SEPARATION_ETA: float = 30.0  # |X_i^T beta| выше порога -> квази-разделимость
    WEIGHT_FLOOR: float = 1e-10
    GAUSSIAN_NOISE_SD: float = 1.0  # sigma_eps при генерации гауссовского отклика


class ScreeningSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="screening_")

    GRID_SIZE: int = 20
    GRID_UPPER_QUANTILE: float = 0.9
    # feasible: нижний край оставляет n - 1 столбцов, верхний по квантилю всех |mmle|
    GRID_SIZE_RULE: GridSizeRule = GridSizeRule.N_OVER_LOG_N


class PenaltySettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="penalty_")

    SCAD_A: float = 3.7
    MCP_A: float = 3.0
    LLA_STEPS: int = 2  # внешние шаги LLA, не больше LLA_MAX_STEPS
    LLA_MAX_STEPS: int = 10
    CD_TOL: float = 1e-9
    CD_MAX_SWEEPS: int = 10000
    NEWTON_MAX_ITER: int = 50
    NEWTON_TOL: float = 1e-10
    LAMBDA_GRID_SIZE: int = 30
    LAMBDA_C_MIN: float = 0.01
    LAMBDA_C_MAX: float = 4.0
    KKT_TOL: float = 1e-6


class EntropySettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="entropy_")

    MC_SAMPLES: int = 100000
    MIN_MC_SAMPLES: int = 1000
    MC_CHUNK: int = 50000  # строк ковариат за один проход генератора


class InferenceSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="inference_")

    ALPHA: float = 0.05
    POISSON_TAIL: float = 1e-12  # отбрасываемая масса пуассоновской смеси
    BISECT_REL_WIDTH: float = 1e-10
    MAX_DOUBLINGS: int = 80


class SimSettings(BaseSettings):
    model_config = SettingsConfigDict(env_prefix="sim_")

    N: int = 300
    P: int = 600
    REPS: int = 500
    SMALL_N: int = 200
    SMALL_P: int = 400
    SMALL_REPS: int = 200
    TRUTH_SAMPLES: int = 10000  # выборка для псевдо-истинного beta_0
    MC_SAMPLES: int = 10000  # выборка для Монте-Карло H_m
    ORACLE_MC_SAMPLES: int = 200000
    BASE_SEED: int = 20240101


class LoggerConfig(BaseSettings):
    LOG_LEVEL: str = "INFO"


class Settings(BaseSettings):

    glm: GlmSettings = GlmSettings()
    screening: ScreeningSettings = ScreeningSettings()
    penalty: PenaltySettings = PenaltySettings()
    entropy: EntropySettings = EntropySettings()
    inference: InferenceSettings = InferenceSettings()
    sim: SimSettings = SimSettings()
    logger_config: LoggerConfig = LoggerConfig()


settings = Settings()
