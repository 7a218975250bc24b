"""Backend package for the GW modelling toolkit"""
