from .policies import ExpertQueuePolicy, FixedQueuePolicy, LearnedQueuePolicy, RandomQueuePolicy
from .scenario import (CITIES, DYNAMIC, IDEAL, PRESETS, CallEnv, ConfigError, ManeuverPlan,
                       ScenarioConfig, call_env, load_config, scenario_from_dict)
from .pipeline import (CollectResult, DatasetSchemaError, EvalReport, HandoverStats, cluster, collect,
                       evaluate, expert_labels, handover_stats, load_dataset, train_policy)
