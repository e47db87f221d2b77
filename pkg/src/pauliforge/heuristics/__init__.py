"""Search baselines: simulated annealing and Monte Carlo tree search."""
from .mcts import MctsConfig, MctsNode, MctsSearch, mcts_run, playout_reward, uct
from .sa import BitEncoding, SaConfig, SearchResult, accept_prob, decode_bits, encode_bits, sa_cost, sa_run
