from .state import (ACTIONS_MS, COLLECTION_LIMITS_MS, H_MAX, SEGMENT_S, STATE_DIM, Experience,
                    QoEWeights, SegmentOutOfRange, SegmentState, action_index, action_ms,
                    build_state, normalize_dataset, qoe)
from .expert import ExpertTable, InsufficientData, build_expert, expert_action, expert_actions, kmeans
from .model import ModelConfig, QueuePolicyNet, ShapeMismatch, forward, infer
from .train import DivergedLoss, EmptyDataset, Hyperparams, TrainResult, train
from .persist import load_expert, load_policy, save_expert, save_policy
