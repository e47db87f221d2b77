"""Reinforcement-learning formulation of gate-set conversion."""
from .env import PHI, EnvState, GscEnv, RewardConfig, encode, env_step, phi
from .network import Adam, QNetwork
from .ddqn import (Stuck, TrainConfig, TrainResult, epsilon_greedy, evaluate_greedy, train,
                   train_batch, ddqn_target)
