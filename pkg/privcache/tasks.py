"""
Tâches Celery pour l'énumération partitionnée des mondes
"""
import logging

import numpy as np
from celery import shared_task

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def count_world_partition(self, payload, start, stop):
    """
    Compte les mondes des paires (aléa, demande) d'indices [start, stop)

    Le résultat est sérialisable en JSON : les lignes sont des codes
    canoniques triés, les comptes des entiers.
    """
    from .algebra import DistributionTable
    from .auditor import WorldSpec, world_model

    spec = WorldSpec.from_payload(payload['spec'])
    variables = list(payload['variables'])

    logger.debug(f"Partition [{start}, {stop}) de {spec.scheme}")

    codes = world_model(spec).partition_codes(variables, start, stop)
    table = DistributionTable(variables, codes, np.ones(len(codes), dtype=np.int64))

    return {
        'variables': variables,
        'rows': table.codes.tolist(),
        'counts': table.counts.tolist(),
    }
