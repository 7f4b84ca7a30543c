"""
Commande d'audit exhaustif d'un schéma de caching ou de PIR
"""
from privcache.auditor import CACHING_CHECKS, FAULTS, PIR_CHECKS
from privcache.cli import cmd_audit
from privcache.export import ExportService
from privcache.management.base import PrivcacheCommand


class Command(PrivcacheCommand):
    help = 'Audite un schéma par énumération exhaustive des mondes (rapport JSON)'
    command_name = 'audit'

    def add_arguments(self, parser):
        self.add_common_arguments(parser, 'scheme', 'N', 'K', 't', 'q')
        parser.add_argument(
            '--checks',
            type=str,
            help=f"Vérifications séparées par des virgules parmi {', '.join(sorted(set(CACHING_CHECKS + PIR_CHECKS)))}",
        )
        parser.add_argument(
            '--budget',
            type=int,
            help='Nombre maximum de mondes énumérés',
        )
        parser.add_argument(
            '--inject-fault',
            dest='fault',
            choices=list(FAULTS),
            help='Injecte une faute (contrôle négatif)',
        )
        parser.add_argument(
            '--count-metadata',
            action='store_true',
            default=None,
            help='Compte les métadonnées diffusées dans la charge',
        )
        parser.add_argument(
            '--tables-dir',
            dest='tables_dir',
            type=str,
            help='Répertoire où écrire les tables de distribution (CSV)',
        )

    def run(self, options):
        checks = options.get('checks')
        config = self.build_config(
            options, 'scheme', 'N', 'K', 't', 'q', 'budget', 'fault', 'count_metadata', 'tables_dir',
            checks=[name.strip() for name in checks.split(',')] if checks else None,
        )
        report = cmd_audit(config)

        for check in report.checks:
            label = check.name if check.user is None else f"{check.name}[k={check.user}]"
            line = f"{label}: {check.verdict}"
            if check.verdict == 'fail':
                line += f" ({check.bits:.6f} bits)"
            if not check.gating:
                self.stdout.write(f"{line} (informatif)")
            elif check.passed:
                self.stdout.write(self.style.SUCCESS(line))
            else:
                self.stdout.write(self.style.ERROR(line))

        measurements = report.measurements
        for key in ('M', 'R', 'download_costs'):
            if key in measurements:
                self.stdout.write(f"{key}: {measurements[key]}")

        if not config.output:
            self.stdout.write(ExportService.render_json(report.as_dict()), ending='')

        if not report.passed:
            return f"Vérifications en échec : {', '.join(report.failed_checks())}"
        self.stdout.write(self.style.SUCCESS(f'Audit terminé: {report.spec.scheme} conforme'))
        return None
