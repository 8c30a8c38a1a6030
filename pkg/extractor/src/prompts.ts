import { readFileSync } from "node:fs";
import { join } from "node:path";

/** Fill {{placeholders}} in a prompt template. */
export function renderTemplate(template: string, vars: Record<string, string>): string {
  return template.replace(/\{\{(\w+)\}\}/g, (_, key: string) => {
    const value = vars[key];
    if (value === undefined) throw new Error(`template references unknown variable {{${key}}}`);
    return value;
  });
}

export function loadTemplates(dir: string): { grading: string; confidence: string } {
  return {
    grading: readFileSync(join(dir, "grading.txt"), "utf-8"),
    confidence: readFileSync(join(dir, "confidence.txt"), "utf-8"),
  };
}
