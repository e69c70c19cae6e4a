from .hardcore import HardCoreConfig, hardcore_chain, hardcore_enumerate
from .lattice import IncrementDistribution, reflected_random_walk, signed_geometric_chain, signed_geometric_pi
from .gibbs import HierarchicalModelSpec, LinearRates, gamma_gibbs, hierarchical_gibbs
from .metropolis import Box, Density1D, independence_sampler, point_process_mhg, rw_mhg
