"""
Socle commun des commandes privcache : options partagées et codes de sortie
"""
import logging

from django.core.management.base import BaseCommand, CommandError

from privcache.cli import RunConfig
from privcache.exceptions import ErrorContext, PrivcacheBaseException
from privcache.metrics import AuditMetrics

logger = logging.getLogger(__name__)

EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2


class PrivcacheCommand(BaseCommand):
    """Commande avec configuration JSON + options, erreurs mappées sur les codes 1/2"""

    command_name = None

    ALIASES = {'N': '--n', 'K': '--k'}

    def add_common_arguments(self, parser, *names):
        options = {
            'N': dict(type=int, help='Nombre de fichiers'),
            'K': dict(type=int, help="Nombre d'utilisateurs"),
            't': dict(type=int, help='Paramètre de mémoire t'),
            'q': dict(type=int, help='Taille du corps premier GF(q)'),
            'mu': dict(type=str, help='Fraction de partage de temps "a/b"'),
            'scheme': dict(type=str, help='Identifiant du schéma (ex: compose:signed4)'),
        }
        parser.add_argument('--config', type=str, help='Fichier de configuration JSON')
        parser.add_argument('--output', '--out', dest='output', type=str, help='Fichier de sortie')
        for name in names:
            flags = [f'--{name}'] + ([self.ALIASES[name]] if name in self.ALIASES else [])
            parser.add_argument(*flags, dest=name, **options[name])

    def build_config(self, options, *names, **extra) -> RunConfig:
        overrides = {name: options.get(name) for name in names}
        overrides.update({'output': options.get('output')}, **extra)
        return RunConfig.from_sources(self.command_name, options.get('config'), **overrides)

    def run(self, options):
        """Exécute la commande ; retourne un message si une vérification bloquante échoue"""
        raise NotImplementedError

    def handle(self, *args, **options):
        try:
            with ErrorContext(self.command_name, options.get('scheme') or options.get('generator')):
                failure = self.run(options)
        except PrivcacheBaseException as error:
            raise CommandError(f"[{error.code}] {error.message}", returncode=EXIT_USAGE) from error

        if options.get('verbosity', 1) >= 2:
            for line in AuditMetrics.summary():
                self.stdout.write(line)

        if failure:
            raise CommandError(failure, returncode=EXIT_CHECK_FAILED)
