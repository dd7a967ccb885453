from typing import Tuple

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Reproducibility
    seed: int = 0  # 所有隨機流程的預設種子（CCDIST_SEED 覆蓋）

    # Newton solvers
    newton_tol: float = 1e-12  # 行縮放殘差的收斂門檻（相對值）
    newton_max_iter: int = 100
    backtrack_halvings: int = 30  # 線搜索最多折半次數
    singular_cond: float = 1e14  # Jacobian 條件數上限，超過視為奇異

    # Classification
    classification_tol: float = 1e-9  # 等式類判定（r24 = r25 = δ^(-1/3)、矩形判定）
    symmetry_tol: float = 1e-8  # 對稱關係的相對容差
    inequality_margin: float = 1e-8  # 嚴格不等式鏈的相對間隔
    membership_tol: float = 1e-9  # 約束集合成員判定（按齊次次數縮放）
    realizability_slack: float = 1e-10  # 三角不等式 / Cayley-Menger 符號的鬆弛量
    cluster_tol: float = 1e-6  # 唯一性探測中的聚類距離（相對）

    # Oracle (position space)
    oracle_tol: float = 1e-12
    oracle_max_iter: int = 200
    cross_validate_tol: float = 1e-8  # 距離空間與位置空間解的最大相對差

    # Finite differences
    fd_step: float = 1e-6  # 一階中心差分步長
    fd_step_second: float = 1e-4  # 二階差分步長

    # Uniqueness probe sampling box
    probe_rho_min: float = 0.2  # r45 / r13
    probe_rho_max: float = 1.8
    probe_height_min: float = 0.3  # 以 r13 / 2 為單位的高度
    probe_height_max: float = 3.0
    probe_offset: float = 0.2  # P2 偏離中點的最大幅度

    # Collinear enumeration
    moulton_max_bodies: int = 8  # n! 增長，超過即拒絕

    # Fixtures
    fixtures_dir: str = "fixtures"
    family_base_ratio: float = 1.2  # 對稱可實現族的預設底邊比

    # Logging
    enable_file_logging: bool = False  # 啟用文件日誌
    log_file_path: str = "logs"  # 日誌文件目錄
    log_retention_days: int = 7  # 日誌保留天數
    enable_text_file_logging: bool = True  # 文本格式日誌（rotate）
    enable_json_file_logging: bool = True  # JSON 行日誌（rotate）
    log_history_size: int = 1000  # 內存歷史條數
    log_echo: bool = False  # 同步輸出到 stderr

    model_config = SettingsConfigDict(env_prefix="CCDIST_", env_file=".env", extra="ignore")


settings = Settings()


def get_probe_box() -> Tuple[Tuple[float, float], Tuple[float, float], float]:
    """唯一性探測的採樣範圍 ((ρ_min, ρ_max), (h_min, h_max), offset)"""
    return (
        (settings.probe_rho_min, settings.probe_rho_max),
        (settings.probe_height_min, settings.probe_height_max),
        settings.probe_offset,
    )


def get_default_seed() -> int:
    """重新讀取環境變量後的種子（CLI 每次調用時使用）"""
    return Settings().seed
