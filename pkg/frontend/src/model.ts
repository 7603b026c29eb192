// Stance label rules mirrored from the server so the UI cannot build a
// request the server would reject. The server stays authoritative; this
// mirror only gates the submit button and checkbox enablement.

export type Primary = "AntiTrans" | "ProTrans" | "Neutral";

export const PRIMARIES: Primary[] = ["AntiTrans", "ProTrans", "Neutral"];

export const ANTI_SUBLABELS = ["TM", "ATM", "XOR", "TERF", "RW", "INTRA"] as const;
export const PRO_SUBLABELS = ["CEL", "REF", "CON"] as const;
export const ALL_SUBLABELS = [...ANTI_SUBLABELS, ...PRO_SUBLABELS];

export const SUBLABEL_TITLES: Record<string, string> = {
  TM: "Transmisogyny",
  ATM: "Anti-transmasculinity",
  XOR: "Exorsexism",
  TERF: "TERF-sourced",
  RW: "Right-wing-sourced",
  INTRA: "Intracommunity",
  CEL: "Celebration of trans existence",
  REF: "Refutation of anti-trans rhetoric",
  CON: "Connection to broader liberation",
};

// Labels submitted before a break reminder appears. Annotating hostile
// content is taxing; the cap nudges, it never blocks.
export const SESSION_LABEL_CAP = 40;

export function enabledSublabels(primary: Primary | null): string[] {
  if (primary === "AntiTrans") return [...ANTI_SUBLABELS];
  if (primary === "ProTrans") return [...PRO_SUBLABELS];
  return [];
}

/** Null when the selection satisfies the stance invariants, else the rule it breaks. */
export function validateSelection(
  primary: Primary | null,
  sublabels: ReadonlySet<string>,
): string | null {
  if (primary === null) {
    return "select a primary stance first";
  }
  if (primary === "Neutral" && sublabels.size > 0) {
    return "Neutral labels cannot carry sublabels";
  }
  const allowed = new Set<string>(enabledSublabels(primary));
  for (const sublabel of sublabels) {
    if (!allowed.has(sublabel)) {
      return `sublabel ${sublabel} is not valid for ${primary}`;
    }
  }
  return null;
}

export function formatKappa(kappa: number | null): string {
  return kappa === null ? "Undefined" : kappa.toFixed(3);
}
