# -*- coding: utf-8 -*-
import logging

import torch

# probabilities are floored here before entering a log ratio
KL_FLOOR = 1e-12
# tolerance on row sums of a distribution matrix
ROW_SUM_TOL = 1e-5

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def setup_logging(level='INFO'):
    if isinstance(level, str):
        level = getattr(logging, level.upper(), logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)


def torch_generator(seed, device='cpu'):
    generator = torch.Generator(device=device)
    generator.manual_seed(int(seed))
    return generator
