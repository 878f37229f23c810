"""
BeamEngineer - Learned QoS multicast beamforming with a hierarchical
permutation-equivariant transformer
"""

__version__ = "0.1.0"
