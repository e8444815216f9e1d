/** Canonical JSON + sha256, byte-compatible with the server's hashing.
 *
 * The server hashes `json.dumps(value, sort_keys=True, separators=(",", ":"))`
 * (Python escapes non-ASCII; all strings here are ASCII identifiers).
 * Integer store values beyond 2^53 would lose precision in a JS number;
 * the debugger is a viewer, so this mirrors what the view model holds.
 */

export function canonicalJson(value: unknown): string {
  if (value === null) {
    return "null";
  }
  if (typeof value === "number") {
    if (!Number.isFinite(value)) {
      throw new Error(`non-finite number in canonical JSON: ${value}`);
    }
    return Number.isInteger(value) ? value.toFixed(0) : String(value);
  }
  if (typeof value === "boolean") {
    return value ? "true" : "false";
  }
  if (typeof value === "string") {
    return escapeString(value);
  }
  if (Array.isArray(value)) {
    return "[" + value.map(canonicalJson).join(",") + "]";
  }
  if (typeof value === "object") {
    const record = value as Record<string, unknown>;
    const keys = Object.keys(record).sort();
    const parts = keys.map((k) => `${escapeString(k)}:${canonicalJson(record[k])}`);
    return "{" + parts.join(",") + "}";
  }
  throw new Error(`cannot canonicalize ${typeof value}`);
}

function escapeString(s: string): string {
  let out = '"';
  for (const ch of s) {
    const code = ch.codePointAt(0) as number;
    if (ch === '"') {
      out += '\\"';
    } else if (ch === "\\") {
      out += "\\\\";
    } else if (code < 0x20 || code > 0x7e) {
      // match Python's ensure_ascii \uXXXX escaping (incl. surrogate pairs)
      if (code > 0xffff) {
        const high = 0xd800 + ((code - 0x10000) >> 10);
        const low = 0xdc00 + ((code - 0x10000) & 0x3ff);
        out += `\\u${hex4(high)}\\u${hex4(low)}`;
      } else {
        const simple: Record<number, string> = {
          8: "\\b",
          9: "\\t",
          10: "\\n",
          12: "\\f",
          13: "\\r",
        };
        out += simple[code] ?? `\\u${hex4(code)}`;
      }
    } else {
      out += ch;
    }
  }
  return out + '"';
}

function hex4(n: number): string {
  return n.toString(16).padStart(4, "0");
}

export async function sha256Hex(text: string): Promise<string> {
  const bytes = new TextEncoder().encode(text);
  const digest = await crypto.subtle.digest("SHA-256", bytes);
  return Array.from(new Uint8Array(digest))
    .map((b) => b.toString(16).padStart(2, "0"))
    .join("");
}
